//! Symbolic dynamics: tent-map itineraries and their inverse, periodic-point
//! enumeration, the middle-thirds Cantor set, the tent/logistic conjugacy,
//! horseshoe rectangles and shift-space machinery. Exact rational
//! arithmetic is the default for all symbolic operations.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{DynError, Result};
use crate::poly::Coeff;

fn half() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(2))
}

/// One exact tent-map step g2(x) = 2x (x <= 1/2), 2 - 2x (x > 1/2).
pub fn tent_step(x: &BigRational) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    if *x <= half() {
        &two * x
    } else {
        &two - &two * x
    }
}

/// Itinerary symbols: +1 when the iterate lies in [0, 1/2] (the tie at 1/2
/// goes to the left branch), -1 otherwise.
pub fn tent_itinerary(x: &BigRational, n: usize) -> Vec<i8> {
    let mut out = Vec::with_capacity(n);
    let mut cur = x.clone();
    for _ in 0..n {
        out.push(if cur <= half() { 1 } else { -1 });
        cur = tent_step(&cur);
    }
    out
}

/// Float-mode itinerary; capped at depth 60 where the 53-bit mantissa of the
/// binary-shift dynamics is exhausted.
pub fn tent_itinerary_f64(x: f64, n: usize) -> Result<Vec<i8>> {
    const CAP: usize = 60;
    if n > CAP {
        return Err(DynError::DepthTooLarge { got: n, cap: CAP });
    }
    let mut out = Vec::with_capacity(n);
    let mut cur = x;
    for _ in 0..n {
        out.push(if cur <= 0.5 { 1 } else { -1 });
        cur = if cur <= 0.5 {
            2.0 * cur
        } else {
            2.0 - 2.0 * cur
        };
    }
    Ok(out)
}

/// Binary digits b_j from the symbol prefix products: (-1)^{b_j} = prod eps_i.
fn symbols_to_bits(symbols: &[i8]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len());
    let mut prod = 1i8;
    for &e in symbols {
        prod *= e;
        bits.push(if prod == 1 { 0 } else { 1 });
    }
    bits
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReconstructedPoint {
    /// Exact preimage of a periodic itinerary.
    Exact(BigRational),
    /// Dyadic interval of all points compatible with a finite itinerary.
    Interval(BigRational, BigRational),
}

/// Inverse of the itinerary map: periodic sequences give the exact rational
/// point (geometric series summed in closed form), finite ones the dyadic
/// interval of all compatible x.
pub fn itinerary_to_point(symbols: &[i8], periodic: bool) -> Result<ReconstructedPoint> {
    if symbols.iter().any(|s| *s != 1 && *s != -1) {
        return Err(DynError::InvalidWord("symbols must be +-1".into()));
    }
    if symbols.is_empty() {
        return Err(DynError::InvalidWord("empty sequence".into()));
    }
    if periodic {
        // the bit sequence repeats with period m or 2m; 2m always works
        let m = symbols.len();
        let doubled: Vec<i8> = symbols.iter().chain(symbols.iter()).cloned().collect();
        let bits = symbols_to_bits(&doubled);
        let mut numerator = BigInt::zero();
        for &b in bits.iter().take(2 * m) {
            numerator = numerator * 2 + BigInt::from(b);
        }
        let denominator = (BigInt::one() << (2 * m)) - BigInt::one();
        Ok(ReconstructedPoint::Exact(BigRational::new(
            numerator,
            denominator,
        )))
    } else {
        let bits = symbols_to_bits(symbols);
        let mut lo = BigRational::from_integer(BigInt::zero());
        let mut scale = BigRational::from_integer(BigInt::one());
        for &b in &bits {
            scale /= BigRational::from_integer(BigInt::from(2));
            if b == 1 {
                lo += scale.clone();
            }
        }
        let hi = lo.clone() + scale;
        Ok(ReconstructedPoint::Interval(lo, hi))
    }
}

/// All 2^p period-p symbol words with their exact points, each verified to
/// satisfy g2^p(x) = x in rational arithmetic.
pub fn enumerate_periodic_tent(p: usize) -> Result<Vec<(Vec<i8>, BigRational)>> {
    assert!((1..=20).contains(&p));
    let mut out = Vec::with_capacity(1 << p);
    for mask in 0u32..(1 << p) {
        let word: Vec<i8> = (0..p)
            .map(|i| if mask & (1 << i) == 0 { 1 } else { -1 })
            .collect();
        let ReconstructedPoint::Exact(x) = itinerary_to_point(&word, true)? else {
            unreachable!()
        };
        let mut y = x.clone();
        for _ in 0..p {
            y = tent_step(&y);
        }
        if y != x {
            return Err(DynError::NoConvergence(format!(
                "periodic point verification failed for word {word:?}"
            )));
        }
        out.push((word, x));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CantorVerdict {
    In,
    Out,
    /// The digit expansion did not resolve within the depth cap.
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct CantorReport {
    pub verdict: CantorVerdict,
    /// Canonical ternary digits (preperiod then one period).
    pub preperiod: Vec<u8>,
    pub period: Vec<u8>,
    /// True when a rewriting rule (10^inf -> 02^inf or 12^inf -> 20^inf)
    /// was applied to reach the canonical form.
    pub canonicalized: bool,
}

/// Membership of the middle-thirds Cantor set decided on the canonical
/// ternary expansion; exact for rationals whose digit cycle resolves within
/// `depth`.
pub fn cantor_membership(x: &BigRational, depth: usize) -> CantorReport {
    assert!(!x.is_negative() && *x <= BigRational::from_integer(BigInt::one()));
    let three = BigRational::from_integer(BigInt::from(3));
    // long division with cycle detection on remainders
    let mut digits: Vec<u8> = Vec::new();
    let mut seen: std::collections::HashMap<BigRational, usize> = Default::default();
    let mut r = x.clone();
    let mut cycle_start = None;
    for _ in 0..depth {
        if let Some(&idx) = seen.get(&r) {
            cycle_start = Some(idx);
            break;
        }
        seen.insert(r.clone(), digits.len());
        let scaled = &r * &three;
        let d = scaled.floor();
        let digit = d.to_integer().min(BigInt::from(2)).max(BigInt::zero());
        let digit_u8 = if digit == BigInt::zero() {
            0u8
        } else if digit == BigInt::one() {
            1
        } else {
            2
        };
        digits.push(digit_u8);
        r = scaled - BigRational::from_integer(digit);
    }
    let Some(start) = cycle_start else {
        return CantorReport {
            verdict: CantorVerdict::Undetermined,
            preperiod: digits,
            period: vec![],
            canonicalized: false,
        };
    };
    let mut pre: Vec<u8> = digits[..start].to_vec();
    let mut per: Vec<u8> = digits[start..].to_vec();
    let mut canonicalized = false;
    // canonical rewriting: d 0^inf -> (d-1) 2^inf when d = 1, and
    // 1 2^inf -> 2 0^inf
    if per.iter().all(|d| *d == 0) {
        if let Some(pos) = pre.iter().rposition(|d| *d != 0) {
            if pre[pos] == 1 {
                pre[pos] = 0;
                pre.truncate(pos + 1);
                per = vec![2];
                canonicalized = true;
            }
        }
    } else if per.iter().all(|d| *d == 2) {
        if let Some(&last_pre) = pre.last() {
            if last_pre == 1 {
                *pre.last_mut().unwrap() = 2;
                per = vec![0];
                canonicalized = true;
            }
        }
    }
    let has_one = pre.iter().chain(per.iter()).any(|d| *d == 1);
    CantorReport {
        verdict: if has_one {
            CantorVerdict::Out
        } else {
            CantorVerdict::In
        },
        preperiod: pre,
        period: per,
        canonicalized,
    }
}

/// Depth-`depth` endpoint sample of the middle-thirds Cantor construction
/// (all 2^{depth+1} interval endpoints), as floats for the box counter.
pub fn cantor_endpoint_sample(depth: usize) -> Vec<Vec<f64>> {
    let mut intervals = vec![(0.0_f64, 1.0_f64)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(intervals.len() * 2);
        for (a, b) in intervals {
            let third = (b - a) / 3.0;
            next.push((a, a + third));
            next.push((b - third, b));
        }
        intervals = next;
    }
    intervals
        .into_iter()
        .flat_map(|(a, b)| [vec![a], vec![b]])
        .collect()
}

/// h(x) = (1 - cos pi x) / 2 conjugates the tent map to the logistic map at
/// lambda = 4.
pub fn tent_to_logistic(x: f64) -> f64 {
    0.5 * (1.0 - (std::f64::consts::PI * x).cos())
}

pub fn logistic_to_tent(y: f64) -> f64 {
    (1.0 - 2.0 * y).acos() / std::f64::consts::PI
}

// ---------------------------------------------------------------------------
// horseshoe
// ---------------------------------------------------------------------------

/// A word around the marked comma: symbols before it pick vertical strips
/// (past iterates), symbols at/after it horizontal strips (future iterates).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorseshoeWord {
    pub past: Vec<i8>,
    pub future: Vec<i8>,
}

impl HorseshoeWord {
    /// Parse "+-,-+" style words (one comma, symbols +/-).
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(',');
        let (Some(p), Some(f), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(DynError::InvalidWord(format!(
                "expected exactly one comma in {s:?}"
            )));
        };
        let to_syms = |t: &str| -> Result<Vec<i8>> {
            t.chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    other => Err(DynError::InvalidWord(format!("bad symbol {other:?}"))),
                })
                .collect()
        };
        Ok(HorseshoeWord {
            past: to_syms(p)?,
            future: to_syms(f)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorseshoeRectangle {
    /// Lower-left corner (exact rationals serialized as "p/q").
    pub corner: [String; 2],
    pub width: String,
    pub height: String,
    /// Float view for plotting.
    pub corner_f64: [f64; 2],
    pub width_f64: f64,
    pub height_f64: f64,
}

fn rat_str(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Rectangle of the linear horseshoe model carrying the given word:
/// width lambda^m (m past symbols), height mu^{-(n+1)} (n+1 future symbols).
/// The linear model maps H+ = [0,1] x [0, 1/mu] by (x, y) -> (lx, my) and
/// H- = [0,1] x [1 - 1/mu, 1] by (x, y) -> (1 - lx, m(1 - y)).
pub fn horseshoe_geometry(
    word: &HorseshoeWord,
    lambda: &BigRational,
    mu: &BigRational,
) -> Result<HorseshoeRectangle> {
    let zero = BigRational::from_integer(BigInt::zero());
    let one = BigRational::from_integer(BigInt::one());
    if !(lambda > &zero && lambda < &half() && mu > &BigRational::from_integer(BigInt::from(2))) {
        return Err(DynError::InvalidWord(
            "need 0 < lambda < 1/2 and mu > 2".into(),
        ));
    }
    // x-interval: push [0,1] forward through the symbols of the past
    let mut xi = (zero.clone(), one.clone());
    for &e in &word.past {
        xi = match e {
            1 => (lambda * &xi.0, lambda * &xi.1),
            -1 => (&one - lambda * &xi.1, &one - lambda * &xi.0),
            _ => return Err(DynError::InvalidWord("bad symbol".into())),
        };
    }
    // y-interval: pull [0,1] back through the future symbols (right to left)
    let mut yi = (zero.clone(), one.clone());
    for &e in word.future.iter().rev() {
        yi = match e {
            1 => (&yi.0 / mu, &yi.1 / mu),
            -1 => (&one - &yi.1 / mu, &one - &yi.0 / mu),
            _ => return Err(DynError::InvalidWord("bad symbol".into())),
        };
    }
    let width = &xi.1 - &xi.0;
    let height = &yi.1 - &yi.0;
    Ok(HorseshoeRectangle {
        corner: [rat_str(&xi.0), rat_str(&yi.0)],
        width: rat_str(&width),
        height: rat_str(&height),
        corner_f64: [Coeff::to_f64(&xi.0), Coeff::to_f64(&yi.0)],
        width_f64: Coeff::to_f64(&width),
        height_f64: Coeff::to_f64(&height),
    })
}

// ---------------------------------------------------------------------------
// shift space
// ---------------------------------------------------------------------------

/// A finite window of a one-sided or bi-infinite symbol sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolSequence {
    OneSided { symbols: Vec<i8>, periodic: bool },
    BiInfinite { symbols: Vec<i8>, origin: usize },
}

impl SymbolSequence {
    /// The shift map: drops the head (one-sided; periodic windows rotate) or
    /// moves the comma one place right (bi-infinite windows).
    pub fn shift(&self) -> SymbolSequence {
        match self {
            SymbolSequence::OneSided { symbols, periodic } => {
                if *periodic {
                    let mut s = symbols.clone();
                    s.rotate_left(1);
                    SymbolSequence::OneSided {
                        symbols: s,
                        periodic: true,
                    }
                } else {
                    SymbolSequence::OneSided {
                        symbols: symbols[1.min(symbols.len())..].to_vec(),
                        periodic: false,
                    }
                }
            }
            SymbolSequence::BiInfinite { symbols, origin } => SymbolSequence::BiInfinite {
                symbols: symbols.clone(),
                origin: (origin + 1).min(symbols.len()),
            },
        }
    }

    fn symbol_at(&self, i: i64) -> Option<i8> {
        match self {
            SymbolSequence::OneSided { symbols, periodic } => {
                if i < 0 {
                    None
                } else if *periodic {
                    Some(symbols[(i as usize) % symbols.len()])
                } else {
                    symbols.get(i as usize).copied()
                }
            }
            SymbolSequence::BiInfinite { symbols, origin } => {
                let idx = i + *origin as i64;
                if idx < 0 {
                    None
                } else {
                    symbols.get(idx as usize).copied()
                }
            }
        }
    }
}

/// Metric d(e, e') = sum (1 - delta_{e_i e'_i}) 2^{-|i|} over the common
/// window.
pub fn shift_distance(a: &SymbolSequence, b: &SymbolSequence, window: i64) -> f64 {
    let mut d = 0.0;
    for i in -window..=window {
        if let (Some(x), Some(y)) = (a.symbol_at(i), b.symbol_at(i)) {
            if x != y {
                d += 2.0_f64.powi(-(i.abs() as i32));
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;
    use rand::{Rng, SeedableRng};

    #[test]
    fn fixed_point_itineraries() {
        let zero = rat(0, 1);
        assert_eq!(tent_itinerary(&zero, 8), vec![1; 8]);
        let two_thirds = rat(2, 3);
        assert_eq!(tent_itinerary(&two_thirds, 8), vec![-1; 8]);
    }

    #[test]
    fn two_fifths_has_period_two() {
        let x = rat(2, 5);
        let it = tent_itinerary(&x, 8);
        assert_eq!(it, vec![1, -1, 1, -1, 1, -1, 1, -1]);
        // the 2-cycle {2/5, 4/5}
        assert_eq!(tent_step(&x), rat(4, 5));
        assert_eq!(tent_step(&rat(4, 5)), rat(2, 5));
    }

    #[test]
    fn itinerary_inverse_closed_forms() {
        let ReconstructedPoint::Exact(x) = itinerary_to_point(&[1], true).unwrap() else {
            panic!()
        };
        assert_eq!(x, rat(0, 1));
        let ReconstructedPoint::Exact(x) = itinerary_to_point(&[-1], true).unwrap() else {
            panic!()
        };
        assert_eq!(x, rat(2, 3));
        let ReconstructedPoint::Exact(x) = itinerary_to_point(&[1, -1], true).unwrap() else {
            panic!()
        };
        assert_eq!(x, rat(2, 5));
    }

    #[test]
    fn periodic_enumeration_counts_and_verifies() {
        let p1 = enumerate_periodic_tent(1).unwrap();
        let pts: Vec<BigRational> = p1.iter().map(|(_, x)| x.clone()).collect();
        assert!(pts.contains(&rat(0, 1)) && pts.contains(&rat(2, 3)));

        let p2 = enumerate_periodic_tent(2).unwrap();
        assert_eq!(p2.len(), 4);
        let pts: Vec<BigRational> = p2.iter().map(|(_, x)| x.clone()).collect();
        for want in [rat(0, 1), rat(2, 3), rat(2, 5), rat(4, 5)] {
            assert!(pts.contains(&want), "missing {want}");
        }

        let p3 = enumerate_periodic_tent(3).unwrap();
        assert_eq!(p3.len(), 8);
        // verification of g2^p(x) = x happens inside the enumerator
    }

    #[test]
    fn itinerary_round_trip_brackets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let q = rng.gen_range(3u64..10_000);
            let p = rng.gen_range(0..=q);
            let x = rat(p as i64, q as i64);
            let it = tent_itinerary(&x, 40);
            let ReconstructedPoint::Interval(lo, hi) = itinerary_to_point(&it, false).unwrap()
            else {
                panic!()
            };
            assert!(lo <= x && x <= hi, "{p}/{q} outside [{lo}, {hi}]");
            let width = &hi - &lo;
            assert_eq!(width, BigRational::new(1.into(), BigInt::one() << 40));
        }
    }

    #[test]
    fn shift_commutes_with_tent_itinerary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let q = rng.gen_range(3u64..5_000);
            let p = rng.gen_range(0..=q);
            let x = rat(p as i64, q as i64);
            let it_x = SymbolSequence::OneSided {
                symbols: tent_itinerary(&x, 30),
                periodic: false,
            };
            let gx = tent_step(&x);
            let it_gx = tent_itinerary(&gx, 29);
            let shifted = it_x.shift();
            let SymbolSequence::OneSided { symbols, .. } = &shifted else {
                panic!()
            };
            assert_eq!(symbols, &it_gx);
        }
    }

    #[test]
    fn float_itinerary_depth_cap() {
        assert!(tent_itinerary_f64(0.3, 60).is_ok());
        assert!(matches!(
            tent_itinerary_f64(0.3, 61),
            Err(DynError::DepthTooLarge { .. })
        ));
        // float and exact agree to the cap for a safely non-dyadic point
        let x = rat(1, 7);
        let exact = tent_itinerary(&x, 40);
        let float = tent_itinerary_f64(1.0 / 7.0, 40).unwrap();
        assert_eq!(exact, float);
    }

    #[test]
    fn cantor_membership_examples() {
        // 1/4 = 0.(02)^inf base 3
        let rep = cantor_membership(&rat(1, 4), 64);
        assert_eq!(rep.verdict, CantorVerdict::In);
        assert!(!rep.canonicalized);

        // 1/2 = 0.(1)^inf: out
        let rep = cantor_membership(&rat(1, 2), 64);
        assert_eq!(rep.verdict, CantorVerdict::Out);

        // 1/3 = 0.1 canonically 0.0(2)^inf: in after rewriting
        let rep = cantor_membership(&rat(1, 3), 64);
        assert_eq!(rep.verdict, CantorVerdict::In);
        assert!(rep.canonicalized);

        // endpoints 0 and 1 and a generic excluded point
        assert_eq!(cantor_membership(&rat(0, 1), 16).verdict, CantorVerdict::In);
        assert_eq!(cantor_membership(&rat(1, 1), 16).verdict, CantorVerdict::In);
        assert_eq!(
            cantor_membership(&rat(1, 2), 16).verdict,
            CantorVerdict::Out
        );
        // 4/9 = 0.11 base 3: inside the removed middle at depth 2
        assert_eq!(
            cantor_membership(&rat(4, 9), 16).verdict,
            CantorVerdict::Out
        );
    }

    #[test]
    fn conjugacy_identity_on_grid() {
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let g2 = if x <= 0.5 { 2.0 * x } else { 2.0 - 2.0 * x };
            let lhs = tent_to_logistic(g2);
            let y = tent_to_logistic(x);
            let rhs = 4.0 * y * (1.0 - y);
            assert!((lhs - rhs).abs() <= 1e-12, "x = {x}: {lhs} vs {rhs}");
        }
        // fixed point transport: h(2/3) = 3/4 is fixed for the logistic map
        let y = tent_to_logistic(2.0 / 3.0);
        assert!((y - 0.75).abs() < 1e-12);
        assert!((4.0 * y * (1.0 - y) - 0.75).abs() < 1e-12);
        assert!((tent_to_logistic(0.0)).abs() < 1e-300);
    }

    #[test]
    fn conjugacy_transports_periodic_points() {
        for p in 1..=6usize {
            for (_, x) in enumerate_periodic_tent(p).unwrap() {
                let mut y = tent_to_logistic(Coeff::to_f64(&x));
                let y0 = y;
                for _ in 0..p {
                    y = 4.0 * y * (1.0 - y);
                }
                assert!((y - y0).abs() <= 1e-10, "p = {p}, y0 = {y0}");
            }
        }
    }

    #[test]
    fn horseshoe_strips_and_nesting() {
        let l = rat(2, 5);
        let m = rat(3, 1);
        // ",+" = H_+: height 1/mu, width 1
        let r = horseshoe_geometry(&HorseshoeWord::parse(",+").unwrap(), &l, &m).unwrap();
        assert_eq!(r.width, "1/1");
        assert_eq!(r.height, "1/3");
        // "-," = V_-: width lambda, height 1
        let r = horseshoe_geometry(&HorseshoeWord::parse("-,").unwrap(), &l, &m).unwrap();
        assert_eq!(r.width, "2/5");
        assert_eq!(r.height, "1/1");
        // "-,+" : lambda x mu^{-1}
        let r = horseshoe_geometry(&HorseshoeWord::parse("-,+").unwrap(), &l, &m).unwrap();
        assert_eq!(r.width, "2/5");
        assert_eq!(r.height, "1/3");

        // nesting: extending the word shrinks the rectangle inside its parent
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let len = rng.gen_range(2..12usize);
            let comma = rng.gen_range(0..=len);
            let syms: Vec<char> = (0..len)
                .map(|_| if rng.gen_bool(0.5) { '+' } else { '-' })
                .collect();
            let word_str = |n: usize| -> String {
                let mut s = String::new();
                for (i, c) in syms.iter().enumerate().take(n) {
                    if i == comma {
                        s.push(',');
                    }
                    s.push(*c);
                }
                if n >= comma && !s.contains(',') {
                    s.push(',');
                }
                s
            };
            let full = word_str(len);
            let parent_str = {
                // drop the final symbol
                let mut s = full.clone();
                if s.ends_with(['+', '-']) {
                    s.pop();
                } else {
                    continue;
                }
                s
            };
            let child = horseshoe_geometry(&HorseshoeWord::parse(&full).unwrap(), &l, &m).unwrap();
            let parent =
                horseshoe_geometry(&HorseshoeWord::parse(&parent_str).unwrap(), &l, &m).unwrap();
            assert!(child.corner_f64[0] >= parent.corner_f64[0] - 1e-15);
            assert!(child.corner_f64[1] >= parent.corner_f64[1] - 1e-15);
            assert!(
                child.corner_f64[0] + child.width_f64
                    <= parent.corner_f64[0] + parent.width_f64 + 1e-15
            );
            assert!(
                child.corner_f64[1] + child.height_f64
                    <= parent.corner_f64[1] + parent.height_f64 + 1e-15
            );
        }
    }

    #[test]
    fn horseshoe_sizes_exact() {
        let l = rat(1, 3);
        let m = rat(5, 2);
        let r = horseshoe_geometry(&HorseshoeWord::parse("+-,+-").unwrap(), &l, &m).unwrap();
        // width = lambda^2 = 1/9; height = mu^{-2} = 4/25
        assert_eq!(r.width, "1/9");
        assert_eq!(r.height, "4/25");
        assert!(horseshoe_geometry(
            &HorseshoeWord::parse("x,").unwrap_or(HorseshoeWord {
                past: vec![2],
                future: vec![]
            }),
            &l,
            &m
        )
        .is_err());
    }

    #[test]
    fn shift_period_two_is_involution() {
        let s = SymbolSequence::OneSided {
            symbols: vec![1, -1],
            periodic: true,
        };
        let twice = s.shift().shift();
        assert_eq!(s, twice);
    }

    #[test]
    fn shift_is_two_lipschitz() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let len = 21usize;
            let a: Vec<i8> = (0..len)
                .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect();
            let mut b = a.clone();
            for v in b.iter_mut() {
                if rng.gen_bool(0.2) {
                    *v = -*v;
                }
            }
            let sa = SymbolSequence::BiInfinite {
                symbols: a,
                origin: 10,
            };
            let sb = SymbolSequence::BiInfinite {
                symbols: b,
                origin: 10,
            };
            // the window covers every difference present in the data, so the
            // Lipschitz bound is not polluted by truncation at the edge
            let d0 = shift_distance(&sa, &sb, 10);
            let d1 = shift_distance(&sa.shift(), &sb.shift(), 10);
            assert!(
                d1 <= 2.0 * d0 + 1e-12,
                "shift expanded the metric too much: {d1} vs {d0}"
            );
        }
    }
}
