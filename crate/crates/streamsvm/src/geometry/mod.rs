//! Explicit-space minimum-enclosing-ball primitives: the one-point
//! streaming update, a ball-plus-points merge solver, exact and (1+eps)
//! MEB solvers, and the adversarial stream generator.
//!
//! All operations are pure; inputs are borrowed, outputs are new values.

mod coreset;
mod merge;
mod welzl;

pub use coreset::meb_core_set;
pub use merge::enclose_ball_and_points;
pub use welzl::exact_meb;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Update threshold used by the geometry fold and the trainers: a point
/// triggers an update only when `d > r * (1 + GEOM_UPDATE_TOL)`.
pub const GEOM_UPDATE_TOL: f64 = 1e-12;

/// A point in Euclidean space.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Point> {
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "point coordinates".into() });
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A ball with explicit center and radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Ball> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidConfig(format!("ball radius {radius} must be finite and >= 0")));
        }
        Ok(Ball { center, radius })
    }

    /// Zero-radius ball at a point.
    pub fn at_point(p: Point) -> Ball {
        Ball { center: p, radius: 0.0 }
    }
}

/// Tolerances and caps for the enclosing-ball solvers.
#[derive(Debug, Clone)]
pub struct MebSolverConfig {
    /// Relative optimality gap the merge solver must certify, in (0, 1).
    pub merge_tolerance: f64,
    /// Cap on outer solver iterations.
    pub max_iterations: usize,
    /// Epsilon for (1+eps)-approximate core-set solves, in (0, 1).
    pub epsilon_coreset: f64,
}

impl Default for MebSolverConfig {
    fn default() -> Self {
        MebSolverConfig {
            merge_tolerance: 1e-9,
            max_iterations: 128,
            epsilon_coreset: 1e-3,
        }
    }
}

impl MebSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.merge_tolerance > 0.0 && self.merge_tolerance < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "merge_tolerance {} outside (0, 1)",
                self.merge_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.epsilon_coreset > 0.0 && self.epsilon_coreset < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_coreset {} outside (0, 1)",
                self.epsilon_coreset
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_same_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One-point streaming ball update.
///
/// If the point lies inside the current ball (within `tol`, relatively),
/// the ball is returned unchanged. Otherwise the ball grows by
/// `delta = (d - r) / 2` and the center moves `delta` toward the point,
/// which is the smallest ball enclosing both the old ball and the point.
///
/// The update fires only for `d > r * (1 + tol)`: at `d == r` the
/// closed-form step is a no-op that would only inflate the core count,
/// so boundary points are treated as enclosed.
pub fn stream_update(ball: &Ball, p: &Point, tol: f64) -> Result<(Ball, bool)> {
    check_same_dim(ball.center.dim(), p.dim())?;
    if p.coords.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "stream_update point".into() });
    }
    let d = dist(&ball.center.coords, &p.coords);
    if d <= ball.radius * (1.0 + tol) {
        return Ok((ball.clone(), false));
    }
    let delta = 0.5 * (d - ball.radius);
    let step = delta / d;
    let center: Vec<f64> = ball
        .center
        .coords
        .iter()
        .zip(&p.coords)
        .map(|(c, x)| c + step * (x - c))
        .collect();
    let updated = Ball {
        center: Point { coords: center },
        radius: ball.radius + delta,
    };
    Ok((updated, true))
}

/// Folds `stream_update` over a point sequence, starting from a
/// zero-radius ball at the first point.
pub fn fold_stream(points: &[Point], tol: f64) -> Result<Ball> {
    let first = points.first().ok_or(Error::EmptyInput { context: "fold_stream" })?;
    let mut ball = Ball::at_point(first.clone());
    for p in &points[1..] {
        ball = stream_update(&ball, p, tol)?.0;
    }
    Ok(ball)
}

/// Placement of the lone far point in the adversarial instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingletonPosition {
    First,
    Last,
    Random,
}

/// Worst-case stream for the one-point update rule: two tight clouds on
/// the boundary of the true MEB at (0, 1) and (0, -1), plus a single
/// point at (1 + sqrt(2), 0). When the singleton arrives last the folded
/// ball's radius lands at (1 + sqrt(2)) / 2 times the optimum.
///
/// `n` must be odd and >= 3. Cloud jitter is at most 1e-6 in magnitude
/// and seeded, keeping the instance non-degenerate for exact solvers
/// without moving the ratio at the measured precision.
pub fn adversarial_stream(n: usize, seed: u64, singleton: SingletonPosition) -> Result<Vec<Point>> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidConfig(format!("adversarial_stream needs odd n >= 3, got {n}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let half = (n - 1) / 2;
    let jittered = |cx: f64, cy: f64, rng: &mut ChaCha20Rng| {
        let r = 1e-6 * rng.gen::<f64>();
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        Point {
            coords: vec![cx + r * theta.cos(), cy + r * theta.sin()],
        }
    };
    let mut cloud = Vec::with_capacity(n - 1);
    for i in 0..(n - 1) {
        let cy = if i % 2 == 0 { 1.0 } else { -1.0 };
        cloud.push(jittered(0.0, cy, &mut rng));
    }
    debug_assert_eq!(cloud.iter().filter(|p| p.coords[1] > 0.0).count(), half);
    let far = Point {
        coords: vec![1.0 + std::f64::consts::SQRT_2, 0.0],
    };
    let pos = match singleton {
        SingletonPosition::First => 0,
        SingletonPosition::Last => n - 1,
        SingletonPosition::Random => rng.gen_range(0..n),
    };
    let mut points = cloud;
    points.insert(pos.min(points.len()), far);
    Ok(points)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Dense linear solve (Gaussian elimination, partial pivoting) used
    /// by test oracles. Returns None when the system is singular.
    pub fn solve_dense(a: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
        let n = rhs.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .zip(rhs)
            .map(|(row, &r)| {
                let mut v = row.clone();
                v.push(r);
                v
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
            if m[pivot][col].abs() < 1e-12 {
                return None;
            }
            m.swap(col, pivot);
            for row in 0..n {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for k in col..=n {
                        let v = m[col][k];
                        m[row][k] -= f * v;
                    }
                }
            }
        }
        Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
    }

    /// Smallest ball with all of `subset` on its boundary, via the dual
    /// equality system; used by the brute-force MEB oracle.
    pub fn circumball(points: &[&Point]) -> Option<Ball> {
        let k = points.len();
        let dim = points[0].dim();
        // KKT system: 2 G lambda + nu 1 = |q|^2, sum lambda = 1, with
        // coordinates shifted by points[0] for conditioning.
        let shift = &points[0].coords;
        let q: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.coords.iter().zip(shift).map(|(a, b)| a - b).collect())
            .collect();
        let mut a = vec![vec![0.0; k + 1]; k + 1];
        let mut rhs = vec![0.0; k + 1];
        for i in 0..k {
            for j in 0..k {
                a[i][j] = 2.0 * q[i].iter().zip(&q[j]).map(|(x, y)| x * y).sum::<f64>();
            }
            a[i][k] = 1.0;
            a[k][i] = 1.0;
            rhs[i] = q[i].iter().map(|x| x * x).sum();
        }
        rhs[k] = 1.0;
        let sol = solve_dense(&a, &rhs)?;
        let mut center = vec![0.0; dim];
        for (i, qi) in q.iter().enumerate() {
            for (c, v) in center.iter_mut().zip(qi) {
                *c += sol[i] * v;
            }
        }
        let center: Vec<f64> = center.iter().zip(shift).map(|(c, s)| c + s).collect();
        let radius = points
            .iter()
            .map(|p| dist(&center, &p.coords))
            .fold(0.0, f64::max);
        Some(Ball {
            center: Point { coords: center },
            radius,
        })
    }

    /// Exhaustive MEB oracle: tries every support subset of size up to
    /// dim + 1 and keeps the smallest circumball enclosing all points.
    pub fn brute_force_meb(points: &[Point]) -> Ball {
        let n = points.len();
        let dim = points[0].dim();
        let mut best: Option<Ball> = None;
        let max_k = (dim + 1).min(n);
        let mut subset = Vec::new();
        fn rec(
            points: &[Point],
            start: usize,
            subset: &mut Vec<usize>,
            max_k: usize,
            best: &mut Option<Ball>,
        ) {
            if !subset.is_empty() {
                let refs: Vec<&Point> = subset.iter().map(|&i| &points[i]).collect();
                if let Some(ball) = circumball(&refs) {
                    let encloses = points
                        .iter()
                        .all(|p| dist(&ball.center.coords, &p.coords) <= ball.radius * (1.0 + 1e-9) + 1e-12);
                    if encloses && best.as_ref().map_or(true, |b| ball.radius < b.radius) {
                        *best = Some(ball);
                    }
                }
            }
            if subset.len() == max_k {
                return;
            }
            for i in start..points.len() {
                subset.push(i);
                rec(points, i + 1, subset, max_k, best);
                subset.pop();
            }
        }
        rec(points, 0, &mut subset, max_k, &mut best);
        best.expect("brute force found no enclosing ball")
    }

    pub fn random_points(rng: &mut ChaCha20Rng, n: usize, dim: usize, scale: f64) -> Vec<Point> {
        (0..n)
            .map(|_| Point {
                coords: (0..dim).map(|_| rng.gen_range(-scale..scale)).collect(),
            })
            .collect()
    }
}
