//! Box-counting dimension estimation.

use serde::Serialize;
use std::collections::BTreeSet;

use crate::error::{DynError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct DimensionEstimate {
    pub eps_ladder: Vec<f64>,
    /// Smallest occupied-cell count over four grid anchor offsets per rung.
    pub counts: Vec<usize>,
    /// Least-squares slope of log N against log(1/eps).
    pub slope: f64,
    pub r2: f64,
}

/// Occupied closed boxes of an offset grid. A point sitting exactly on a
/// grid line lies in two adjacent closed boxes; charging it to an already
/// occupied neighbor (second pass) approximates the minimal cover, which is
/// what the box dimension is defined on.
fn count_cells(points: &[Vec<f64>], lo: &[f64], hi: &[f64], eps: f64, offset: f64) -> usize {
    let dim = lo.len();
    let coords = |p: &[f64]| -> Vec<(i64, bool)> {
        (0..dim)
            .map(|d| {
                let span = (hi[d] - lo[d]) / eps;
                let mut t = (p[d] - lo[d]) / eps + offset;
                if t >= span + offset {
                    t = span + offset;
                }
                let near = t.round();
                if (t - near).abs() < 1e-9 * t.abs().max(1.0) && near > offset.ceil() {
                    // on a grid line: boxes near-1 and near both contain it
                    ((near as i64) - 1, true)
                } else {
                    (t.floor() as i64, false)
                }
            })
            .collect()
    };
    let mut cells: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut boundary_pts: Vec<Vec<(i64, bool)>> = Vec::new();
    for p in points {
        let c = coords(p);
        if c.iter().any(|(_, b)| *b) {
            boundary_pts.push(c);
        } else {
            cells.insert(c.into_iter().map(|(i, _)| i).collect());
        }
    }
    for c in boundary_pts {
        // any occupied box among the 2^b closed-box candidates absorbs it
        let n_bdry = c.iter().filter(|(_, b)| *b).count();
        let mut covered = false;
        'outer: for mask in 0..(1u32 << n_bdry) {
            let mut key = Vec::with_capacity(dim);
            let mut bit = 0;
            for &(i, b) in &c {
                if b {
                    key.push(i + ((mask >> bit) & 1) as i64);
                    bit += 1;
                } else {
                    key.push(i);
                }
            }
            if cells.contains(&key) {
                covered = true;
                break 'outer;
            }
        }
        if !covered {
            cells.insert(c.into_iter().map(|(i, _)| i).collect());
        }
    }
    cells.len()
}

/// Counts occupied cells of axis-aligned grids of side eps anchored at the
/// cloud's bounding-box corner and fits the scaling slope.
pub fn box_dimension(points: &[Vec<f64>], eps_ladder: &[f64]) -> Result<DimensionEstimate> {
    assert!(points.len() >= 2, "need a point cloud");
    assert!(eps_ladder.len() >= 4, "need at least 4 ladder rungs");
    let dim = points[0].len();
    let lo: Vec<f64> = (0..dim)
        .map(|d| points.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..dim)
        .map(|d| {
            points
                .iter()
                .map(|p| p[d])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let diameter: f64 = lo
        .iter()
        .zip(hi.iter())
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    if diameter == 0.0 {
        return Err(DynError::DegenerateCloud);
    }
    let mut eps_sorted: Vec<f64> = eps_ladder.to_vec();
    eps_sorted.sort_by(|a, b| b.total_cmp(a));
    let mut counts = Vec::with_capacity(eps_sorted.len());
    let mut xs = Vec::with_capacity(eps_sorted.len());
    let mut ys = Vec::with_capacity(eps_sorted.len());
    for &eps in &eps_sorted {
        // the box dimension uses the smallest cover: take the best grid over
        // four anchor offsets, which removes the anchoring bias
        let best = [0.0, 0.25, 0.5, 0.75]
            .iter()
            .map(|&o| count_cells(points, &lo, &hi, eps, o))
            .min()
            .unwrap();
        counts.push(best);
        xs.push((1.0 / eps).ln());
        ys.push((best as f64).ln());
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(DimensionEstimate {
        eps_ladder: eps_sorted,
        counts,
        slope,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::symbolic::cantor_endpoint_sample;

    #[test]
    fn cantor_set_dimension() {
        let pts = cantor_endpoint_sample(10);
        assert!(pts.len() >= 2000);
        let ladder: Vec<f64> = (2..=7).map(|k| 3.0_f64.powi(-k)).collect();
        let est = box_dimension(&pts, &ladder).unwrap();
        let d0 = 2.0_f64.ln() / 3.0_f64.ln();
        assert!(
            (est.slope - d0).abs() / d0 < 0.02,
            "slope {} vs {d0}",
            est.slope
        );
        // counts non-increasing in eps (ladder stored descending)
        for w in est.counts.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn unit_square_dimension_is_two() {
        let mut pts = Vec::new();
        for i in 0..100 {
            for j in 0..100 {
                pts.push(vec![i as f64 / 99.0, j as f64 / 99.0]);
            }
        }
        let ladder: Vec<f64> = (1..=5).map(|k| 2.0_f64.powi(-k)).collect();
        let est = box_dimension(&pts, &ladder).unwrap();
        assert!((est.slope - 2.0).abs() / 2.0 < 0.05, "slope {}", est.slope);
    }

    #[test]
    fn segment_dimension_is_one() {
        let pts: Vec<Vec<f64>> = (0..1000).map(|i| vec![i as f64 / 999.0, 0.3]).collect();
        let ladder: Vec<f64> = (2..=6).map(|k| 2.0_f64.powi(-k)).collect();
        let est = box_dimension(&pts, &ladder).unwrap();
        assert!((est.slope - 1.0).abs() < 0.05, "slope {}", est.slope);
    }

    #[test]
    fn degenerate_cloud_is_rejected() {
        let pts = vec![vec![1.0, 1.0]; 10];
        assert!(matches!(
            box_dimension(&pts, &[0.5, 0.25, 0.125, 0.0625]),
            Err(DynError::DegenerateCloud)
        ));
    }
}
