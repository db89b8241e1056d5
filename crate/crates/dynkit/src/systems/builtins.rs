//! The builtin system catalog. Names and parameter names are a stable
//! public contract used by the CLI and config files.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_rational::BigRational;

use super::{ParamSet, ParamSpec, SystemDef, SystemKind};
use crate::error::{DynError, Result};
use crate::poly::{rat, Coeff, Poly};

pub fn builtin_names() -> &'static [&'static str] {
    &[
        "standard_map",
        "lorenz",
        "logistic",
        "tent",
        "tent3",
        "henon",
        "duffing_forced",
        "van_der_pol",
        "hill",
        "pitchfork_demo",
        "linear",
    ]
}

pub fn builtin_param_specs(name: &str) -> Result<Vec<ParamSpec>> {
    let specs = match name {
        "standard_map" => vec![ParamSpec {
            name: "eps",
            default: 0.5,
            range: None,
        }],
        "lorenz" => vec![
            ParamSpec {
                name: "sigma",
                default: 10.0,
                range: Some((0.0, f64::INFINITY)),
            },
            ParamSpec {
                name: "b",
                default: 8.0 / 3.0,
                range: Some((0.0, f64::INFINITY)),
            },
            ParamSpec {
                name: "r",
                default: 28.0,
                range: Some((0.0, f64::INFINITY)),
            },
        ],
        "logistic" => vec![ParamSpec {
            name: "lambda",
            default: 4.0,
            range: Some((0.0, 4.0)),
        }],
        "pitchfork_demo" => vec![ParamSpec {
            name: "lambda",
            default: 1.0,
            range: None,
        }],
        "tent" | "tent3" => vec![],
        "henon" => vec![
            ParamSpec {
                name: "lambda",
                default: 1.4,
                range: None,
            },
            ParamSpec {
                name: "b",
                default: 0.3,
                range: None,
            },
        ],
        "duffing_forced" => vec![ParamSpec {
            name: "eps",
            default: 0.25,
            range: None,
        }],
        "van_der_pol" => vec![ParamSpec {
            name: "lambda",
            default: 1.0,
            range: None,
        }],
        "hill" => vec![
            ParamSpec {
                name: "T",
                default: PI,
                range: Some((0.0, f64::INFINITY)),
            },
            ParamSpec {
                name: "Omega",
                default: 2.0,
                range: Some((0.0, f64::INFINITY)),
            },
        ],
        "linear" => vec![],
        other => return Err(DynError::UnknownSystem(other.to_string())),
    };
    Ok(specs)
}

fn params_from_specs(specs: &[ParamSpec]) -> ParamSet {
    specs
        .iter()
        .map(|s| (s.name.to_string(), s.default))
        .collect()
}

pub(super) fn construct(name: &str) -> Result<SystemDef> {
    let specs = builtin_param_specs(name)?;
    let params = params_from_specs(&specs);
    let sys = match name {
        "standard_map" => standard_map(params),
        "lorenz" => lorenz(params),
        "logistic" => logistic(params),
        "tent" => tent(2.0),
        "tent3" => tent(3.0),
        "henon" => henon(params),
        "duffing_forced" => duffing_forced(params),
        "van_der_pol" => van_der_pol(params),
        "hill" => hill(params),
        "pitchfork_demo" => pitchfork_demo(params),
        "linear" => SystemDef::linear(
            SystemKind::Flow,
            DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        ),
        other => return Err(DynError::UnknownSystem(other.to_string())),
    };
    Ok(sys)
}

/// Kicked rotator: p' = p - eps sin q, then q' = q + p' (mod 2 pi).
/// The momentum update feeds the position update, which makes the map
/// area-preserving (unit Jacobian determinant).
fn standard_map(params: ParamSet) -> SystemDef {
    SystemDef::from_parts(
        "standard_map",
        SystemKind::Map,
        2,
        params,
        vec![(0, TAU)],
        Arc::new(|p, _, x, out| {
            let eps = p["eps"];
            let p_next = x[1] - eps * x[0].sin();
            out[0] = (x[0] + p_next).rem_euclid(TAU);
            out[1] = p_next;
        }),
        Some(Arc::new(|p, _, x, m| {
            let eps = p["eps"];
            let c = eps * x[0].cos();
            m[(0, 0)] = 1.0 - c;
            m[(0, 1)] = 1.0;
            m[(1, 0)] = -c;
            m[(1, 1)] = 1.0;
        })),
        None,
        None,
    )
}

fn lorenz(params: ParamSet) -> SystemDef {
    SystemDef::from_parts(
        "lorenz",
        SystemKind::Flow,
        3,
        params,
        vec![],
        Arc::new(|p, _, x, out| {
            let (s, b, r) = (p["sigma"], p["b"], p["r"]);
            out[0] = s * (x[1] - x[0]);
            out[1] = r * x[0] - x[1] - x[0] * x[2];
            out[2] = -b * x[2] + x[0] * x[1];
        }),
        Some(Arc::new(|p, _, x, m| {
            let (s, b, r) = (p["sigma"], p["b"], p["r"]);
            m[(0, 0)] = -s;
            m[(0, 1)] = s;
            m[(0, 2)] = 0.0;
            m[(1, 0)] = r - x[2];
            m[(1, 1)] = -1.0;
            m[(1, 2)] = -x[0];
            m[(2, 0)] = x[1];
            m[(2, 1)] = x[0];
            m[(2, 2)] = -b;
        })),
        Some(Arc::new(|p, _, _| -(p["sigma"] + 1.0 + p["b"]))),
        Some(Arc::new(|p, promote| {
            let s = BigRational::from_f64_exact(p["sigma"]);
            let b = BigRational::from_f64_exact(p["b"]);
            let r = BigRational::from_f64_exact(p["r"]);
            match promote {
                None => {
                    let (x, y, z) = (Poly::var(3, 0), Poly::var(3, 1), Poly::var(3, 2));
                    Some(vec![
                        y.sub(&x).scale(&s),
                        x.scale(&r).sub(&y).sub(&x.mul(&z)),
                        z.scale(&b).neg().add(&x.mul(&y)),
                    ])
                }
                Some("r") => {
                    let (x, y, z, rv) = (
                        Poly::var(4, 0),
                        Poly::var(4, 1),
                        Poly::var(4, 2),
                        Poly::var(4, 3),
                    );
                    Some(vec![
                        y.sub(&x).scale(&s),
                        rv.mul(&x).sub(&y).sub(&x.mul(&z)),
                        z.scale(&b).neg().add(&x.mul(&y)),
                    ])
                }
                Some(_) => None,
            }
        })),
    )
}

fn logistic(params: ParamSet) -> SystemDef {
    SystemDef::from_parts(
        "logistic",
        SystemKind::Map,
        1,
        params,
        vec![],
        Arc::new(|p, _, x, out| {
            out[0] = p["lambda"] * x[0] * (1.0 - x[0]);
        }),
        Some(Arc::new(|p, _, x, m| {
            m[(0, 0)] = p["lambda"] * (1.0 - 2.0 * x[0]);
        })),
        None,
        Some(Arc::new(|p, promote| {
            let l = BigRational::from_f64_exact(p["lambda"]);
            match promote {
                None => {
                    let x = Poly::var(1, 0);
                    Some(vec![x.sub(&x.mul(&x)).scale(&l)])
                }
                Some("lambda") => {
                    let (x, lv) = (Poly::var(2, 0), Poly::var(2, 1));
                    Some(vec![lv.mul(&x.sub(&x.mul(&x)))])
                }
                Some(_) => None,
            }
        })),
    )
}

/// Tent map of slope `mu` on [0, 1]. The left branch owns the tie at 1/2.
fn tent(mu: f64) -> SystemDef {
    let name = if mu == 2.0 { "tent" } else { "tent3" };
    SystemDef::from_parts(
        name,
        SystemKind::Map,
        1,
        ParamSet::new(),
        vec![],
        Arc::new(move |_, _, x, out| {
            out[0] = if x[0] <= 0.5 {
                mu * x[0]
            } else {
                mu - mu * x[0]
            };
        }),
        Some(Arc::new(move |_, _, x, m| {
            m[(0, 0)] = if x[0] <= 0.5 { mu } else { -mu };
        })),
        None,
        None,
    )
}

fn henon(params: ParamSet) -> SystemDef {
    SystemDef::from_parts(
        "henon",
        SystemKind::Map,
        2,
        params,
        vec![],
        Arc::new(|p, _, x, out| {
            out[0] = 1.0 - p["lambda"] * x[0] * x[0] + x[1];
            out[1] = p["b"] * x[0];
        }),
        Some(Arc::new(|p, _, x, m| {
            m[(0, 0)] = -2.0 * p["lambda"] * x[0];
            m[(0, 1)] = 1.0;
            m[(1, 0)] = p["b"];
            m[(1, 1)] = 0.0;
        })),
        None,
        Some(Arc::new(|p, promote| {
            if promote.is_some() {
                return None;
            }
            let l = BigRational::from_f64_exact(p["lambda"]);
            let b = BigRational::from_f64_exact(p["b"]);
            let (x, y) = (Poly::var(2, 0), Poly::var(2, 1));
            Some(vec![
                Poly::constant(2, rat(1, 1))
                    .sub(&x.mul(&x).scale(&l))
                    .add(&y),
                x.scale(&b),
            ])
        })),
    )
}

/// Periodically forced Duffing oscillator, autonomized with the phase
/// x3 = t (mod 1) as a circle coordinate.
fn duffing_forced(params: ParamSet) -> SystemDef {
    SystemDef::from_parts(
        "duffing_forced",
        SystemKind::Flow,
        3,
        params,
        vec![(2, 1.0)],
        Arc::new(|p, _, x, out| {
            out[0] = x[1];
            out[1] = x[0] - x[0] * x[0] * x[0] + p["eps"] * (TAU * x[2]).sin();
            out[2] = 1.0;
        }),
        Some(Arc::new(|p, _, x, m| {
            m.fill(0.0);
            m[(0, 1)] = 1.0;
            m[(1, 0)] = 1.0 - 3.0 * x[0] * x[0];
            m[(1, 2)] = p["eps"] * TAU * (TAU * x[2]).cos();
        })),
        Some(Arc::new(|_, _, _| 0.0)),
        None,
    )
}

fn van_der_pol(params: ParamSet) -> SystemDef {
    SystemDef::from_parts(
        "van_der_pol",
        SystemKind::Flow,
        2,
        params,
        vec![],
        Arc::new(|p, _, x, out| {
            out[0] = x[1] + p["lambda"] * x[0] - x[0] * x[0] * x[0] / 3.0;
            out[1] = -x[0];
        }),
        Some(Arc::new(|p, _, x, m| {
            m[(0, 0)] = p["lambda"] - x[0] * x[0];
            m[(0, 1)] = 1.0;
            m[(1, 0)] = -1.0;
            m[(1, 1)] = 0.0;
        })),
        Some(Arc::new(|p, _, x| p["lambda"] - x[0] * x[0])),
        Some(Arc::new(|p, promote| {
            let l = BigRational::from_f64_exact(p["lambda"]);
            let third = rat(1, 3);
            match promote {
                None => {
                    let (x, y) = (Poly::var(2, 0), Poly::var(2, 1));
                    let cube = x.mul(&x).mul(&x).scale(&third);
                    Some(vec![y.add(&x.scale(&l)).sub(&cube), x.neg()])
                }
                Some("lambda") => {
                    let (x, y, lv) = (Poly::var(3, 0), Poly::var(3, 1), Poly::var(3, 2));
                    let cube = x.mul(&x).mul(&x).scale(&third);
                    Some(vec![y.add(&lv.mul(&x)).sub(&cube), x.neg()])
                }
                Some(_) => None,
            }
        })),
    )
}

/// Hill equation y1'' = -w(t)^2 y1 as a first-order system; w is Omega on
/// the first half of each period of length T and 1 on the second half.
fn hill(params: ParamSet) -> SystemDef {
    fn omega(p: &ParamSet, t: f64) -> f64 {
        let period = p["T"];
        let phase = t.rem_euclid(period);
        if phase < 0.5 * period {
            p["Omega"]
        } else {
            1.0
        }
    }
    SystemDef::from_parts(
        "hill",
        SystemKind::Flow,
        2,
        params,
        vec![],
        Arc::new(|p, t, x, out| {
            let w = omega(p, t);
            out[0] = x[1];
            out[1] = -w * w * x[0];
        }),
        Some(Arc::new(|p, t, _, m| {
            let w = omega(p, t);
            m[(0, 0)] = 0.0;
            m[(0, 1)] = 1.0;
            m[(1, 0)] = -w * w;
            m[(1, 1)] = 0.0;
        })),
        Some(Arc::new(|_, _, _| 0.0)),
        None,
    )
}

/// x1' = lambda x1 - x1^3, x2' = -x2. At lambda = 1 this is the textbook
/// attracting-set example with omega-limits (+-1, 0).
fn pitchfork_demo(params: ParamSet) -> SystemDef {
    SystemDef::from_parts(
        "pitchfork_demo",
        SystemKind::Flow,
        2,
        params,
        vec![],
        Arc::new(|p, _, x, out| {
            out[0] = p["lambda"] * x[0] - x[0] * x[0] * x[0];
            out[1] = -x[1];
        }),
        Some(Arc::new(|p, _, x, m| {
            m[(0, 0)] = p["lambda"] - 3.0 * x[0] * x[0];
            m[(0, 1)] = 0.0;
            m[(1, 0)] = 0.0;
            m[(1, 1)] = -1.0;
        })),
        Some(Arc::new(|p, _, x| p["lambda"] - 3.0 * x[0] * x[0] - 1.0)),
        Some(Arc::new(|p, promote| {
            let l = BigRational::from_f64_exact(p["lambda"]);
            match promote {
                None => {
                    let (x, y) = (Poly::var(2, 0), Poly::var(2, 1));
                    let cube = x.mul(&x).mul(&x);
                    Some(vec![x.scale(&l).sub(&cube), y.neg()])
                }
                Some("lambda") => {
                    let (x, y, lv) = (Poly::var(3, 0), Poly::var(3, 1), Poly::var(3, 2));
                    let cube = x.mul(&x).mul(&x);
                    Some(vec![lv.mul(&x).sub(&cube), y.neg()])
                }
                Some(_) => None,
            }
        })),
    )
}
