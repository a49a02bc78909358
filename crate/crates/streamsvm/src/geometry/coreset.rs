//! (1+eps)-approximate MEB via the iterative core-set scheme: start at
//! any point and repeatedly step toward the current farthest point with
//! step size 1/(t+1).

use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, Ball, Point};

/// Runs the core-set iteration until no point lies outside (1+eps) times
/// the certified radius lower bound, or until ceil(1/eps^2) iterations.
///
/// The lower bound is the dual value of the current convex combination:
/// for center `c = sum_n alpha_n p_n` with `alpha` on the simplex,
/// `R*^2 >= sum_n alpha_n |p_n|^2 - |c|^2`, so the early exit certifies
/// the returned radius is within (1+eps) of optimal.
///
/// Returns the ball (radius = exact max distance from the final center)
/// and the indices of the farthest points touched, in first-touch order.
/// Farthest-point ties break toward the lowest index.
pub fn meb_core_set(points: &[Point], epsilon: f64) -> Result<(Ball, Vec<usize>)> {
    let first = points.first().ok_or(Error::EmptyInput { context: "meb_core_set" })?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let dim = first.dim();
    for p in points {
        check_same_dim(dim, p.dim())?;
        if p.coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "meb_core_set point".into() });
        }
    }

    let sq_norms: Vec<f64> = points
        .iter()
        .map(|p| p.coords.iter().map(|v| v * v).sum())
        .collect();
    let mut center = first.coords.clone();
    let mut alpha_sq_norm = sq_norms[0]; // sum_n alpha_n |p_n|^2
    let mut core: Vec<usize> = vec![0];

    let max_iter = (1.0 / (epsilon * epsilon)).ceil() as usize;
    let mut radius = 0.0;
    for t in 1..=max_iter {
        // farthest point, lowest index on ties
        let mut far_idx = 0;
        let mut far_d2 = -1.0;
        for (i, p) in points.iter().enumerate() {
            let d2: f64 = center
                .iter()
                .zip(&p.coords)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 > far_d2 {
                far_d2 = d2;
                far_idx = i;
            }
        }
        radius = far_d2.sqrt();
        let center_sq: f64 = center.iter().map(|v| v * v).sum();
        let lower = (alpha_sq_norm - center_sq).max(0.0).sqrt();
        if radius <= (1.0 + epsilon) * lower {
            break;
        }
        let gamma = 1.0 / (t as f64 + 1.0);
        for (c, v) in center.iter_mut().zip(&points[far_idx].coords) {
            *c += gamma * (v - *c);
        }
        alpha_sq_norm = (1.0 - gamma) * alpha_sq_norm + gamma * sq_norms[far_idx];
        if !core.contains(&far_idx) {
            core.push(far_idx);
        }
    }
    Ok((
        Ball {
            center: Point { coords: center },
            radius,
        },
        core,
    ))
}
